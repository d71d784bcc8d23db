#pragma once

#include <optional>
#include <type_traits>
#include <utility>

#include "sppc/errors.hpp"
#include "sppc/linalg.hpp"

namespace sppc {

/// Scalar-input LTI plant x(k+1) = A x(k) + B u(k).
///
/// Construction rejects non-square A, a B that does not match A, and
/// unreachable pairs (rank of [B, AB, ..., A^{n-1}B] below n).
template <typename Scalar>
class PlantModel {
 public:
  PlantModel(Mat<Scalar> A, Vec<Scalar> B) : A_(std::move(A)), B_(std::move(B)) {
    if (A_.rows() < 1 || A_.rows() != A_.cols())
      throw ConstructionError("plant: A must be square with n >= 1");
    if (B_.rows() != A_.rows())
      throw ConstructionError("plant: B must have the same number of rows as A");
    if (reachability_rank() != n())
      throw ConstructionError("plant: (A, B) is not reachable");
  }

  const Mat<Scalar>& A() const { return A_; }
  const Vec<Scalar>& B() const { return B_; }
  Eigen::Index n() const { return A_.rows(); }

  Mat<Scalar> reachability_matrix() const {
    Mat<Scalar> R(n(), n());
    Vec<Scalar> col = B_;
    for (Eigen::Index j = 0; j < n(); ++j) {
      R.col(j) = col;
      col = A_ * col;
    }
    return R;
  }

  Eigen::Index reachability_rank() const {
    Eigen::FullPivLU<Mat<Scalar>> lu(reachability_matrix());
    return lu.rank();
  }

 private:
  Mat<Scalar> A_;
  Vec<Scalar> B_;
};

template <typename Scalar>
Vec<Scalar> plant_step(const PlantModel<Scalar>& model, const std::type_identity_t<Vec<Scalar>>& x,
                       std::type_identity_t<Scalar> u) {
  SPPC_EXPECT(x.size() == model.n(), "plant_step: state dimension mismatch");
  return model.A() * x + model.B() * u;
}

/// Actuator-side packet buffer. Starts empty (all zeros).
template <typename Scalar>
class BufferState {
 public:
  explicit BufferState(Eigen::Index horizon) : b_(Vec<Scalar>::Zero(horizon)) {
    SPPC_EXPECT(horizon >= 1, "buffer: horizon must be >= 1");
  }
  explicit BufferState(Vec<Scalar> contents) : b_(std::move(contents)) {
    SPPC_EXPECT(b_.size() >= 1, "buffer: horizon must be >= 1");
  }

  const Vec<Scalar>& contents() const { return b_; }
  Eigen::Index horizon() const { return b_.size(); }
  Scalar front() const { return b_(0); }

 private:
  Vec<Scalar> b_;
};

template <typename Scalar>
struct BufferUpdate {
  BufferState<Scalar> buffer;
  Scalar applied_input;
};

/// One actuator tick. A dropped packet shifts the buffer left and zero-fills
/// the tail; a received packet overwrites it. The applied input is always the
/// head of the resulting buffer.
template <typename Scalar>
BufferUpdate<Scalar> buffer_step(const BufferState<Scalar>& buf, bool dropped,
                                 const std::optional<std::type_identity_t<Vec<Scalar>>>& incoming) {
  const Eigen::Index N = buf.horizon();
  if (dropped) {
    Vec<Scalar> next = Vec<Scalar>::Zero(N);
    next.head(N - 1) = buf.contents().tail(N - 1);
    BufferState<Scalar> out(std::move(next));
    const Scalar u = out.front();
    return {std::move(out), u};
  }
  SPPC_EXPECT(incoming.has_value(), "buffer_step: packet missing on a successful reception");
  SPPC_EXPECT(incoming->size() == N, "buffer_step: packet length differs from buffer horizon");
  BufferState<Scalar> out(*incoming);
  const Scalar u = out.front();
  return {std::move(out), u};
}

/// State after applying the first `steps` packet entries open loop:
/// A^i x + sum_l A^{i-1-l} B u_l.
template <typename Scalar>
Vec<Scalar> rollout(const PlantModel<Scalar>& model, const std::type_identity_t<Vec<Scalar>>& x,
                    const std::type_identity_t<Vec<Scalar>>& packet, Eigen::Index steps) {
  SPPC_EXPECT(x.size() == model.n(), "rollout: state dimension mismatch");
  SPPC_EXPECT(steps >= 1 && steps <= packet.size(), "rollout: step count outside [1, N]");
  Vec<Scalar> free = x;
  Vec<Scalar> forced = Vec<Scalar>::Zero(model.n());
  Vec<Scalar> impulse = model.B();  // A^{i-1-l} B, walking l downward
  for (Eigen::Index l = steps - 1; l >= 0; --l) {
    forced += impulse * packet(l);
    impulse = model.A() * impulse;
    free = model.A() * free;
  }
  return free + forced;
}

}  // namespace sppc
