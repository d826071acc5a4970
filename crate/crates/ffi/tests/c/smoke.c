#include <stdio.h>
#include <string.h>
#include "trajsim.h"

#define CHECK(expr)                                                          \
  do {                                                                       \
    TrajsimStatus s_ = (expr);                                               \
    if (s_ != TRAJSIM_STATUS_OK) {                                           \
      fprintf(stderr, "%s -> %d: %s\n", #expr, (int)s_, trajsim_last_error()); \
      return 1;                                                              \
    }                                                                        \
  } while (0)

int main(void) {
  TrajsimWorld *world = NULL;
  CHECK(trajsim_world_from_config(NULL, &world));
  if (trajsim_world_building_count(world) == 0) return 2;

  uint32_t d = 0;
  CHECK(trajsim_world_door_distance(world, 0, 0, &d));
  if (d != 0) return 3;
  if (trajsim_world_door_distance(world, 100000, 0, &d) != TRAJSIM_STATUS_INVALID_ARGUMENT) return 4;
  if (trajsim_last_error() == NULL) return 5;
  trajsim_world_free(world);

  TrajsimPing pings[6];
  for (int i = 0; i < 6; i++) {
    pings[i].unix_timestamp = 60 * i;
    pings[i].x = i < 3 ? 1.0 : 9.0;
    pings[i].y = 1.0;
    pings[i].ha = 0.0;
  }
  int32_t labels[6];
  TrajsimDbscanParams dp = {0.5, 5.0, 1};
  CHECK(trajsim_dbscan(pings, 6, dp, labels));
  if (labels[0] != 0 || labels[5] != 1) return 6;

  TrajsimStops *stops = NULL;
  TrajsimLachesisParams lp = {1.0, 5.0, 0.5};
  CHECK(trajsim_lachesis(pings, 6, lp, &stops));
  if (trajsim_stops_len(stops) != 2) return 7;
  TrajsimStop stop;
  CHECK(trajsim_stops_get(stops, 1, &stop));
  if (stop.member_count != 3 || stop.x != 9.0 || trajsim_stops_members(stops, 1)[0] != 3) return 8;
  trajsim_stops_free(stops);

  printf("ok %s\n", trajsim_version());
  return 0;
}
