#include <math.h>
#include <stdio.h>
#include <string.h>

#include "budget_pacing.h"

#define CHECK(cond)                                              \
  do {                                                           \
    if (!(cond)) {                                               \
      fprintf(stderr, "%s:%d: check failed: %s\n", __FILE__,     \
              __LINE__, #cond);                                  \
      return 1;                                                  \
    }                                                            \
  } while (0)

int main(void) {
  BpCostFn *cost = NULL;
  CHECK(bp_cost_monomial(1.0, 1.4, 100.0, &cost) == BP_STATUS_OK);

  BpCampaignConfig config = bp_config_default(50000.0, 1000);
  BpTrajectory *traj = NULL;
  CHECK(bp_simulate(&config, cost, NULL, &traj) == BP_STATUS_OK);

  BpSummary summary;
  CHECK(bp_trajectory_summary(traj, &summary) == BP_STATUS_OK);
  CHECK(fabs(summary.spend_fraction - 0.9987) < 0.002);

  char *json = NULL;
  CHECK(bp_analyze_json(50000.0, 1000, 1.0, 1.4, INFINITY, 1e-6, &json) == BP_STATUS_OK);
  CHECK(strstr(json, "\"regime\"") != NULL);
  bp_string_free(json);

  BpCostFn *bad = NULL;
  CHECK(bp_cost_parse("min(b^2", &bad) == BP_STATUS_PARSE);
  CHECK(bp_last_error_message() != NULL);

  bp_trajectory_free(traj);
  bp_cost_free(cost);
  printf("ok %s\n", bp_version());
  return 0;
}
