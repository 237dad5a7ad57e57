#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "foresee/errors.hpp"
#include "foresee/tensor.hpp"

namespace foresee {

template <class T>
struct GradCheckReport {
  struct Flag {
    std::size_t input;
    std::size_t index;
    T analytic;
    T numeric;
    T rel_error;
  };
  std::vector<T> max_rel_error;  // one entry per input tensor
  std::vector<Flag> flagged;     // entries exceeding the tolerance

  bool ok() const { return flagged.empty(); }
  T worst() const {
    T w = T(0);
    for (T v : max_rel_error) w = std::max(w, v);
    return w;
  }
};

namespace detail {

template <class T>
inline T relative_error(T analytic, T numeric) {
  const T denom = std::max({std::abs(analytic), std::abs(numeric), T(1e-6)});
  return std::abs(analytic - numeric) / denom;
}

}  // namespace detail

// Central-difference check of the tape gradient of a scalar-valued function.
// `f` is called as f(tape, inputs) and must build its result through taped
// operations on the given inputs. Non-determinism is detected by evaluating
// twice at the base point and comparing bit-for-bit.
template <class T, class F>
GradCheckReport<T> grad_check(F&& f, std::vector<Tensor<T>> inputs, T step, T tolerance) {
  if (!(step > T(0))) throw ContractError("grad_check: step must be positive");

  for (auto& in : inputs) {
    in.set_requires_grad(true);
    in.zero_grad();
  }

  auto eval = [&](Tape<T>* tape) -> Tensor<T> {
    Tape<T> local;
    Tape<T>* use = tape ? tape : &local;
    Tensor<T> y = f(*use, inputs);
    if (y.size() != 1)
      throw ContractError("grad_check: function must return a scalar, got shape " +
                          shape_str(y.shape()));
    return y;
  };

  Tape<T> tape;
  Tensor<T> y0 = eval(&tape);
  Tensor<T> y1 = eval(nullptr);
  if (y0.item() != y1.item())
    throw ContractError("grad_check: function is not deterministic (double evaluation mismatch)");

  tape.backward(y0);

  GradCheckReport<T> report;
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    Tensor<T>& in = inputs[i];
    T worst = T(0);
    for (std::size_t j = 0; j < in.size(); ++j) {
      const T saved = in[j];
      in[j] = saved + step;
      const T fp = eval(nullptr).item();
      in[j] = saved - step;
      const T fm = eval(nullptr).item();
      in[j] = saved;
      const T numeric = (fp - fm) / (T(2) * step);
      const T analytic = in.grad()[j];
      const T rel = detail::relative_error(analytic, numeric);
      worst = std::max(worst, rel);
      if (rel > tolerance)
        report.flagged.push_back({i, j, analytic, numeric, rel});
    }
    report.max_rel_error.push_back(worst);
  }
  return report;
}

}  // namespace foresee
