#ifndef TRAJSIM_H
#define TRAJSIM_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Status codes. Error values match the `trajsim` CLI exit codes.
typedef enum TrajsimStatus {
  TRAJSIM_STATUS_OK = 0,
  TRAJSIM_STATUS_INVALID_ARGUMENT = 2,
  TRAJSIM_STATUS_CONFLICT = 3,
  TRAJSIM_STATUS_NO_PATH = 4,
  TRAJSIM_STATUS_PRECONDITION = 5,
  TRAJSIM_STATUS_IO = 6,
  TRAJSIM_STATUS_PARSE = 7,
  TRAJSIM_STATUS_NULL_POINTER = 8,
  TRAJSIM_STATUS_PANIC = 9,
} TrajsimStatus;

// A sparse ping sequence owned by the library.
typedef struct TrajsimPings TrajsimPings;

// Detected stops.
typedef struct TrajsimStops TrajsimStops;

// A city together with its street graph and door distances.
typedef struct TrajsimWorld TrajsimWorld;

typedef struct TrajsimPing {
  int64_t unix_timestamp;
  double x;
  double y;
  // Horizontal accuracy (95% radius), blocks.
  double ha;
} TrajsimPing;

typedef struct TrajsimDbscanParams {
  // Blocks.
  double dist_thresh;
  // Minutes.
  double time_thresh;
  size_t min_pts;
} TrajsimDbscanParams;

typedef struct TrajsimLachesisParams {
  double dur_min;
  double dt_max;
  double delta_roam;
} TrajsimLachesisParams;

typedef struct TrajsimStop {
  int64_t start;
  int64_t end;
  double x;
  double y;
  size_t member_count;
} TrajsimStop;

typedef struct TrajsimNhppParams {
  double beta_start;
  double beta_duration;
  double beta_ping;
} TrajsimNhppParams;

// Message for the last failed call on this thread, or NULL. The pointer is
// valid until the next library call on the same thread.
const char *trajsim_last_error(void);

// Library version as a static NUL-terminated string.
const char *trajsim_version(void);

void trajsim_string_free(char *s);

// Build the city described by a TOML run configuration (NULL for defaults).
enum TrajsimStatus trajsim_world_from_config(const char *config_toml, struct TrajsimWorld **out);

// Load a city from its JSON form.
enum TrajsimStatus trajsim_world_from_json(const char *json, struct TrajsimWorld **out);

void trajsim_world_free(struct TrajsimWorld *world);

// Serialize the city to JSON. Free the result with `trajsim_string_free`.
enum TrajsimStatus trajsim_world_to_json(const struct TrajsimWorld *world, char **out);

// Number of buildings, or 0 for a NULL handle.
size_t trajsim_world_building_count(const struct TrajsimWorld *world);

// Identifier of building `index`. Free the result with `trajsim_string_free`.
enum TrajsimStatus trajsim_world_building_id(const struct TrajsimWorld *world,
                                             size_t index,
                                             char **out);

// Street distance in blocks between the doors of buildings `k` and `l`.
enum TrajsimStatus trajsim_world_door_distance(const struct TrajsimWorld *world,
                                               size_t k,
                                               size_t l,
                                               uint32_t *out);

// Temporal DBSCAN. Writes one label per ping into `labels` (-1 for noise).
enum TrajsimStatus trajsim_dbscan(const struct TrajsimPing *pings,
                                  size_t n,
                                  struct TrajsimDbscanParams params,
                                  int32_t *labels);

// Temporal DBSCAN, returning one stop per cluster.
enum TrajsimStatus trajsim_dbscan_stops(const struct TrajsimPing *pings,
                                        size_t n,
                                        struct TrajsimDbscanParams params,
                                        struct TrajsimStops **out);

// Sequential stop detection. Pings must be sorted by time.
enum TrajsimStatus trajsim_lachesis(const struct TrajsimPing *pings,
                                    size_t n,
                                    struct TrajsimLachesisParams params,
                                    struct TrajsimStops **out);

size_t trajsim_stops_len(const struct TrajsimStops *stops);

enum TrajsimStatus trajsim_stops_get(const struct TrajsimStops *stops,
                                     size_t index,
                                     struct TrajsimStop *out);

// Ping indices belonging to stop `index`, `member_count` entries long. The
// pointer lives as long as the handle. NULL when out of range.
const size_t *trajsim_stops_members(const struct TrajsimStops *stops, size_t index);

void trajsim_stops_free(struct TrajsimStops *stops);

// Sample bursty noisy pings from a trajectory CSV written by `trajsim`.
// The ping stream is seeded from `seed` and the trajectory identifier.
enum TrajsimStatus trajsim_sparsify_trajectory_csv(const char *path,
                                                   struct TrajsimNhppParams nhpp,
                                                   double ha,
                                                   uint64_t seed,
                                                   struct TrajsimPings **out);

// Load a sparse ping CSV.
enum TrajsimStatus trajsim_pings_load_csv(const char *path, struct TrajsimPings **out);

size_t trajsim_pings_len(const struct TrajsimPings *pings);

// Contiguous ping array, `trajsim_pings_len` entries long, valid while the
// handle lives.
const struct TrajsimPing *trajsim_pings_data(const struct TrajsimPings *pings);

void trajsim_pings_free(struct TrajsimPings *pings);

// Write a population dataset and its manifest into `out_dir`.
// `jobs` = 0 uses every core.
enum TrajsimStatus trajsim_generate_dataset(const char *config_toml,
                                            const char *out_dir,
                                            size_t jobs);

// Regenerate a dataset from its manifest. `mismatched` receives the number
// of files whose digest differs from the manifest.
enum TrajsimStatus trajsim_replay_dataset(const char *manifest,
                                          const char *out_dir,
                                          size_t jobs,
                                          size_t *mismatched);

// Run `"example1"` or `"example2"`. `out_dir` may be NULL to skip writing
// files. The report JSON is returned through `report_json`; free it with
// `trajsim_string_free`.
enum TrajsimStatus trajsim_run_experiment(const char *name,
                                          const char *config_toml,
                                          const char *out_dir,
                                          size_t jobs,
                                          char **report_json);

#endif  /* TRAJSIM_H */
