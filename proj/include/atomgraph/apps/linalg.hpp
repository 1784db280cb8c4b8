/**
 * Copyright (c) 2012 Carnegie Mellon University.
 *     All rights reserved.
 *
 *  Licensed under the Apache License, Version 2.0 (the "License");
 *  you may not use this file except in compliance with the License.
 *  You may obtain a copy of the License at
 *
 *      http://www.apache.org/licenses/LICENSE-2.0
 *
 *  Unless required by applicable law or agreed to in writing,
 *  software distributed under the License is distributed on an "AS
 *  IS" BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either
 *  express or implied.  See the License for the specific language
 *  governing permissions and limitations under the License.
 */

#ifndef ATOMGRAPH_APPS_LINALG_HPP
#define ATOMGRAPH_APPS_LINALG_HPP

#include <cmath>
#include <cstddef>
#include <vector>

namespace atomgraph {

/**
 * Dense symmetric positive (semi-)definite solve via LDL^T, sized for the
 * small d x d normal-equation systems in ALS. Returns false when the
 * system is numerically singular.
 */
inline bool symmetric_solve(std::vector<double> a, std::vector<double> b,
                            std::size_t n, std::vector<double>& x) {
  std::vector<double> diag(n, 0.0);
  double scale = 0.0;
  for (std::size_t i = 0; i < n; ++i) scale = std::max(scale, std::fabs(a[i * n + i]));
  const double tol = (scale > 0 ? scale : 1.0) * 1e-12;

  // in-place LDL^T: L unit lower, D on diag
  for (std::size_t j = 0; j < n; ++j) {
    double d = a[j * n + j];
    for (std::size_t k = 0; k < j; ++k) d -= a[j * n + k] * a[j * n + k] * diag[k];
    if (std::fabs(d) <= tol) return false;
    diag[j] = d;
    for (std::size_t i = j + 1; i < n; ++i) {
      double v = a[i * n + j];
      for (std::size_t k = 0; k < j; ++k) v -= a[i * n + k] * a[j * n + k] * diag[k];
      a[i * n + j] = v / d;
    }
  }
  // forward: L y = b
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t k = 0; k < i; ++k) b[i] -= a[i * n + k] * b[k];
  // D z = y
  for (std::size_t i = 0; i < n; ++i) b[i] /= diag[i];
  // back: L^T x = z
  for (std::size_t ii = n; ii-- > 0;)
    for (std::size_t k = ii + 1; k < n; ++k) b[ii] -= a[k * n + ii] * b[k];
  x = std::move(b);
  return true;
}

}  // namespace atomgraph

#endif
