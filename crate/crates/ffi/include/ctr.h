#ifndef CTR_H
#define CTR_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Result code of every fallible call.
typedef enum ctr_status {
  CTR_STATUS_OK = 0,
  CTR_STATUS_NULL_POINTER = 1,
  CTR_STATUS_INVALID_UTF8 = 2,
  // Robot description could not be parsed.
  CTR_STATUS_PARSE_ERROR = 3,
  // Tube parameters or joint values violate the model's invariants.
  CTR_STATUS_INVALID_CONFIGURATION = 4,
  // The bending plane is undefined or registration points are degenerate.
  CTR_STATUS_DEGENERATE = 5,
  // G-code line could not be parsed or names an unknown axis.
  CTR_STATUS_GCODE_ERROR = 6,
  // Move target outside an axis' travel limits.
  CTR_STATUS_JOINT_LIMIT = 7,
  // Move before homing.
  CTR_STATUS_NOT_HOMED = 8,
  // Output buffer too small; the required count was written.
  CTR_STATUS_BUFFER_TOO_SMALL = 9,
  CTR_STATUS_PANIC = 10,
} ctr_status;

// Opaque virtual motion controller bound to one robot's axes.
typedef struct ctr_controller ctr_controller;

// Opaque robot: tubes, axis assignment and initial joints.
typedef struct ctr_robot ctr_robot;

// Rigid transform; `rotation` is row-major.
typedef struct ctr_pose {
  double rotation[9];
  double translation[3];
} ctr_pose;

// One constant-curvature link.
typedef struct ctr_link {
  // Arc length where the link starts (mm).
  double start;
  double arc_length;
  // 1/mm
  double curvature;
  // Bending plane relative to the previous link (degrees).
  double plane_angle;
  // Bending plane in the base frame (degrees).
  double absolute_plane_angle;
  // Number of tubes present along the link.
  size_t member_count;
} ctr_link;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message for the last failed call on this thread, or null after a
// successful one. Valid until the next call into this library on the same
// thread.
const char *ctr_last_error_message(void);

// Library version as a static NUL-terminated string.
const char *ctr_version(void);

// Releases a string returned by this library. Null is ignored.
//
// # Safety
// `s` must come from this library and not have been freed already.
void ctr_string_free(char *s);

// Builds a robot from the text of a TOML robot description.
//
// # Safety
// `toml` must be a NUL-terminated string and `out` a valid pointer.
enum ctr_status ctr_robot_from_toml(const char *toml, struct ctr_robot **out);

// Releases a robot. Null is ignored.
//
// # Safety
// `robot` must come from [`ctr_robot_from_toml`] and not have been freed.
void ctr_robot_free(struct ctr_robot *robot);

// # Safety
// `robot` and `out` must be valid pointers.
enum ctr_status ctr_robot_tube_count(const struct ctr_robot *robot, size_t *out);

// Copies the robot's initial joints into two arrays of `n` doubles, where
// `n` must equal the tube count.
//
// # Safety
// Both arrays must hold `n` doubles.
enum ctr_status ctr_robot_initial_joints(const struct ctr_robot *robot,
                                         double *translations,
                                         double *rotations,
                                         size_t n);

// Tip pose for the given joints.
//
// # Safety
// Joint arrays must hold `n` doubles; `out` must be valid.
enum ctr_status ctr_forward_kinematics(const struct ctr_robot *robot,
                                       const double *translations,
                                       const double *rotations,
                                       size_t n,
                                       struct ctr_pose *out);

// Writes up to `capacity` links into `links` and the total count into
// `count`. Returns [`CtrStatus::BufferTooSmall`] when `capacity < count`;
// pass `capacity = 0` to query the count.
//
// # Safety
// Joint arrays must hold `n` doubles; `links` must hold `capacity` entries.
enum ctr_status ctr_links(const struct ctr_robot *robot,
                          const double *translations,
                          const double *rotations,
                          size_t n,
                          struct ctr_link *links,
                          size_t capacity,
                          size_t *count);

// Samples the centerline every `ds` mm (plus every link boundary and the
// tip). Writes `x, y, z` triples into `points` (room for `capacity` points,
// i.e. `3 * capacity` doubles), the arc length of each point into
// `arc_lengths` when non-null, and the total point count into `count`.
//
// # Safety
// Joint arrays must hold `n` doubles; output arrays must be sized as above.
enum ctr_status ctr_backbone(const struct ctr_robot *robot,
                             const double *translations,
                             const double *rotations,
                             size_t n,
                             double ds,
                             double *points,
                             double *arc_lengths,
                             size_t capacity,
                             size_t *count);

// G-code program that drives the robot's carts to the given joints. A
// `feed` of zero or less omits the feed word. Release `out` with
// [`ctr_string_free`].
//
// # Safety
// Joint arrays must hold `n` doubles; `out` must be valid.
enum ctr_status ctr_gcode_emit(const struct ctr_robot *robot,
                               const double *translations,
                               const double *rotations,
                               size_t n,
                               double feed,
                               char **out);

// New controller for the robot's axes, unhomed and in absolute mode.
//
// # Safety
// `robot` and `out` must be valid pointers.
enum ctr_status ctr_controller_new(const struct ctr_robot *robot, struct ctr_controller **out);

// Releases a controller. Null is ignored.
//
// # Safety
// `controller` must come from [`ctr_controller_new`] and not have been freed.
void ctr_controller_free(struct ctr_controller *controller);

// Executes one G-code line. On success `reply` (when non-null) receives the
// firmware reply, `ok` or a position report, or null for a blank line. A
// rejected line leaves the controller unchanged.
//
// # Safety
// `controller` must be valid and `line` NUL-terminated.
enum ctr_status ctr_controller_apply_line(struct ctr_controller *controller,
                                          const char *line,
                                          char **reply);

// Actual (step-quantized) position of axis `letter`, in mm or degrees.
//
// # Safety
// `controller` and `out` must be valid pointers.
enum ctr_status ctr_controller_axis_position(const struct ctr_controller *controller,
                                             char letter,
                                             double *out);

// Least-squares rigid transform mapping tracker coordinates onto base
// coordinates from `n` corresponding points (`3 * n` doubles each).
//
// # Safety
// Point arrays must hold `3 * n` doubles; `out` must be valid; `fit_rmse`
// may be null.
enum ctr_status ctr_register_frames(const double *tracker_points,
                                    const double *base_points,
                                    size_t n,
                                    struct ctr_pose *out,
                                    double *fit_rmse);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* CTR_H */
