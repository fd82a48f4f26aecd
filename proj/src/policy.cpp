#include "pilqr/policy.hpp"

namespace pilqr {

Policy make_open_loop_policy(const std::vector<Vector>& inputs, int state_dim) {
  Policy policy;
  policy.feedforward = inputs;
  policy.gain.reserve(inputs.size());
  policy.reference.reserve(inputs.size());
  for (const Vector& u : inputs) {
    policy.gain.push_back(Matrix::Zero(u.size(), state_dim));
    policy.reference.push_back(Vector::Zero(state_dim));
  }
  return policy;
}

Policy make_constant_policy(const Matrix& K, const Vector& u_ref, const Vector& x_ref,
                            int horizon) {
  Policy policy;
  policy.feedforward.assign(static_cast<std::size_t>(horizon), u_ref);
  policy.gain.assign(static_cast<std::size_t>(horizon), K);
  policy.reference.assign(static_cast<std::size_t>(horizon), x_ref);
  return policy;
}

void validate_policy(const Policy& policy) {
  const std::size_t n = policy.feedforward.size();
  if (policy.gain.size() != n || policy.reference.size() != n) {
    throw std::invalid_argument("[policy] feedforward, gain, reference lengths disagree");
  }
  for (std::size_t i = 0; i < n; ++i) {
    const auto& ff = policy.feedforward[i];
    const auto& K = policy.gain[i];
    const auto& ref = policy.reference[i];
    if (K.rows() != ff.size() || K.cols() != ref.size()) {
      throw std::invalid_argument("[policy] inconsistent dimensions at step " +
                                  std::to_string(i));
    }
    if (!ff.allFinite() || !K.allFinite() || !ref.allFinite()) {
      throw std::invalid_argument("[policy] non-finite entries at step " + std::to_string(i));
    }
  }
}

}  // namespace pilqr
