// Copyright 2026 The Fedtrade Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Small scalar numerics shared by the analytic modules.

#ifndef FEDTRADE_NUMERIC_H_
#define FEDTRADE_NUMERIC_H_

#include <cmath>
#include <utility>

#include <Eigen/Core>

namespace fedtrade {

template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

using VectorXd = Vector<double>;

// Maximizes a unimodal f on [lo, hi]. Returns (argmax, max).
template <typename Scalar, typename F>
std::pair<Scalar, Scalar> TernarySearchMax(F&& f, Scalar lo, Scalar hi,
                                           int iterations = 200) {
  for (int it = 0; it < iterations && hi - lo > Scalar(0); ++it) {
    const Scalar m1 = lo + (hi - lo) / Scalar(3);
    const Scalar m2 = hi - (hi - lo) / Scalar(3);
    if (f(m1) < f(m2)) {
      lo = m1;
    } else {
      hi = m2;
    }
  }
  const Scalar x = (lo + hi) / Scalar(2);
  return {x, f(x)};
}

// Root of f on [lo, hi] given f(lo) and f(hi) of opposite sign (or zero).
template <typename Scalar, typename F>
Scalar Bisect(F&& f, Scalar lo, Scalar hi, Scalar tol) {
  Scalar flo = f(lo);
  if (flo == Scalar(0)) return lo;
  for (int it = 0; it < 400 && hi - lo > tol; ++it) {
    const Scalar mid = lo + (hi - lo) / Scalar(2);
    const Scalar fm = f(mid);
    if (fm == Scalar(0)) return mid;
    if ((fm > Scalar(0)) == (flo > Scalar(0))) {
      lo = mid;
      flo = fm;
    } else {
      hi = mid;
    }
  }
  return lo + (hi - lo) / Scalar(2);
}

// Neumaier compensated accumulator.
class NeumaierSum {
 public:
  void Add(double x) {
    const double t = sum_ + x;
    if (std::abs(sum_) >= std::abs(x)) {
      c_ += (sum_ - t) + x;
    } else {
      c_ += (x - t) + sum_;
    }
    sum_ = t;
  }
  double Value() const { return sum_ + c_; }

 private:
  double sum_ = 0.0;
  double c_ = 0.0;
};

}  // namespace fedtrade

#endif  // FEDTRADE_NUMERIC_H_
