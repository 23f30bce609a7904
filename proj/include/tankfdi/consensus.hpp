#pragma once

#include <vector>

#include "tankfdi/askf.hpp"
#include "tankfdi/common.hpp"

namespace tankfdi {

struct Sensor {
  Matrix Theta;
  Matrix R;
};

struct SensorNetwork {
  std::vector<Sensor> sensors;

  std::size_t size() const { return sensors.size(); }
  void validate(Eigen::Index states) const;

  /// n copies of the same sensor.
  static SensorNetwork identical(const Matrix& Theta, const Matrix& R, std::size_t n);
};

/// How the prior covariance enters the fused information:
/// kUnity uses P^{-1}, kSensorCount uses (n P)^{-1}.
enum class PriorScaling { kUnity, kSensorCount };

struct ConsensusOptions {
  PriorScaling prior_scaling = PriorScaling::kUnity;
  bool propagate_input = true;  ///< xbar+ = A xm + B u instead of A xm
};

struct ConsensusState {
  Vector xbar;  ///< prior mean
  Matrix P;     ///< prior covariance
  Matrix Pk;    ///< fused posterior covariance
  Vector xm;    ///< posterior mean
  long k = 0;
};

/// H = (1/n) sum_i Theta_i^T R_i^{-1} Theta_i.
Matrix fused_information(const SensorNetwork& net);

/// z = (1/n) sum_i Theta_i^T R_i^{-1} y_i, summed in sensor order.
Vector fused_measurement(const SensorNetwork& net, const std::vector<Vector>& measurements);

/// Information-form measurement update from the prior (xbar, P).
ConsensusState consensus_update(const ConsensusState& state, const SensorNetwork& net,
                                const std::vector<Vector>& measurements,
                                const ConsensusOptions& options = {});

/// P+ = A Pk A^T + B Q B^T;  xbar+ = A xm (+ B u).
ConsensusState consensus_predict(const ConsensusState& state, const DiscreteModel& model,
                                 const Vector& u, const ConsensusOptions& options = {});

/// Per step k: predict with inputs[k] from the previous posterior (the
/// initial belief for k = 0), then fuse measurements[k] (one entry per sensor).
/// Each returned state carries the prior (xbar, P) and posterior (xm, Pk) at sample k.
std::vector<ConsensusState> run_consensus(const DiscreteModel& model, const SensorNetwork& net,
                                          const Vector& xbar0, const Matrix& P0,
                                          const std::vector<Vector>& inputs,
                                          const std::vector<std::vector<Vector>>& measurements,
                                          const ConsensusOptions& options = {});

}  // namespace tankfdi
