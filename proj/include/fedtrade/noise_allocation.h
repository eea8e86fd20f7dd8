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

// Per-client noise levels kept in both the alpha (noise std) and beta
// (informativeness) parameterizations.

#ifndef FEDTRADE_NOISE_ALLOCATION_H_
#define FEDTRADE_NOISE_ALLOCATION_H_

#include <cmath>
#include <limits>
#include <stdexcept>

#include "fedtrade/numeric.h"

namespace fedtrade {

template <typename Scalar>
Scalar Infinity() {
  return std::numeric_limits<Scalar>::infinity();
}

// beta = 1 / (1/rho + d alpha^2), written to stay exact at alpha = 0 and
// alpha = inf.
template <typename Scalar>
Scalar BetaOfAlpha(const Scalar& alpha, const Scalar& rho, int dim = 1) {
  using std::isinf;
  if (isinf(alpha)) return Scalar(0);
  return rho / (Scalar(1) + rho * Scalar(dim) * alpha * alpha);
}

template <typename Scalar>
Scalar AlphaOfBeta(const Scalar& beta, const Scalar& rho, int dim = 1) {
  using std::sqrt;
  if (beta <= Scalar(0)) return Infinity<Scalar>();
  if (beta >= rho) return Scalar(0);
  return sqrt((rho - beta) / (rho * beta * Scalar(dim)));
}

template <typename Scalar>
class BasicNoiseAllocation {
 public:
  BasicNoiseAllocation() = default;

  static BasicNoiseAllocation FromAlphas(const Scalar& rho,
                                         const Vector<Scalar>& alphas,
                                         int dim = 1) {
    BasicNoiseAllocation a(rho, alphas.size(), dim);
    for (Eigen::Index i = 0; i < alphas.size(); ++i) a.SetAlpha(i, alphas[i]);
    return a;
  }

  static BasicNoiseAllocation FromBetas(const Scalar& rho,
                                        const Vector<Scalar>& betas,
                                        int dim = 1) {
    BasicNoiseAllocation a(rho, betas.size(), dim);
    for (Eigen::Index i = 0; i < betas.size(); ++i) a.SetBeta(i, betas[i]);
    return a;
  }

  static BasicNoiseAllocation Uniform(const Scalar& rho, Eigen::Index n,
                                      const Scalar& beta, int dim = 1) {
    return FromBetas(rho, Vector<Scalar>::Constant(n, beta), dim);
  }

  void SetAlpha(Eigen::Index i, const Scalar& alpha) {
    using std::isnan;
    if (isnan(alpha) || alpha < Scalar(0)) {
      throw std::domain_error("NoiseAllocation: alpha must be >= 0");
    }
    alphas_[i] = alpha;
    betas_[i] = BetaOfAlpha(alpha, rho_, dim_);
  }

  void SetBeta(Eigen::Index i, const Scalar& beta) {
    using std::isnan;
    if (isnan(beta) || beta < Scalar(0) || beta > rho_) {
      throw std::domain_error("NoiseAllocation: beta must lie in [0, rho]");
    }
    betas_[i] = beta;
    alphas_[i] = AlphaOfBeta(beta, rho_, dim_);
  }

  const Vector<Scalar>& alphas() const { return alphas_; }
  const Vector<Scalar>& betas() const { return betas_; }
  const Scalar& rho() const { return rho_; }
  int dim() const { return dim_; }
  Eigen::Index size() const { return betas_.size(); }

  Scalar Gamma() const { return betas_.sum(); }
  Scalar GammaExcluding(Eigen::Index i) const {
    Scalar g(0);
    for (Eigen::Index k = 0; k < betas_.size(); ++k) {
      if (k != i) g += betas_[k];
    }
    return g;
  }

 private:
  BasicNoiseAllocation(const Scalar& rho, Eigen::Index n, int dim)
      : rho_(rho), dim_(dim), alphas_(n), betas_(n) {
    if (!(rho > Scalar(0))) {
      throw std::domain_error("NoiseAllocation: rho must be positive");
    }
    if (dim < 1) throw std::domain_error("NoiseAllocation: dim must be >= 1");
  }

  Scalar rho_ = Scalar(1);
  int dim_ = 1;
  Vector<Scalar> alphas_;
  Vector<Scalar> betas_;
};

using NoiseAllocation = BasicNoiseAllocation<double>;

}  // namespace fedtrade

#endif  // FEDTRADE_NOISE_ALLOCATION_H_
