#pragma once

#include <mutex>

#include "revio/estimator/factors.hpp"
#include "revio/estimator/lm_solver.hpp"
#include "revio/estimator/types.hpp"

namespace revio {

struct KeyframeRecord {
  int id = -1;  // frame id; strictly increasing with timestamp
  double timestamp = 0;
  NavState state;
  std::vector<Measurement> obs;
  std::vector<int> obs_lm_ids;
  std::vector<int> reid_lm_ids;
  std::vector<int> anchored_lm_ids;
  std::optional<Preintegrated> preint_from_prev;
  std::optional<RelConstraint> rel_from_prev;
};

// Keyframe map plus the landmark store's exported entries. One writer at a
// time; readers go through snapshots. A global BA commit returns the world
// correction of the newest optimized keyframe so the window can follow.
class GlobalMap {
 public:
  GlobalMap(const EstimatorConfig& cfg, LandmarkStore& store) : cfg_(cfg), store_(store) {}

  // Appends the keyframe and takes ownership of its anchored landmarks.
  // Throws std::invalid_argument on duplicate or out-of-order ids.
  void insert_keyframe(const KeyframePackage& pkg);

  MapView snapshot() const;

  struct GbaResult {
    LmStats stats;
    Pose correction;     // T_new * T_old^-1 of the newest optimized keyframe
    std::uint64_t version = 0;
  };

  // Optimizes all keyframe states and all exported landmark inverse depths;
  // the first keyframe pose is gauge-fixed. Throws std::invalid_argument with
  // fewer than 2 keyframes.
  GbaResult solve_global_ba();

  std::size_t size() const;
  std::uint64_t version() const;
  std::vector<int> keyframe_ids() const;
  std::optional<NavState> keyframe_state(int id) const;

  // Text dump: [KEYFRAMES] id ts pose / [LANDMARKS] id anchor rho descriptor-hex.
  std::string dump() const;

  struct GbaInput;  // internal snapshot for one BA run

 private:
  GbaResult commit(const GbaInput& input, const LmStats& stats);

  EstimatorConfig cfg_;
  LandmarkStore& store_;
  mutable std::mutex mutex_;
  std::map<int, KeyframeRecord> keyframes_;
  std::uint64_t version_ = 0;
};

}  // namespace revio
