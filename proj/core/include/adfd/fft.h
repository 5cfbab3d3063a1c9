// Copyright 2026 The adfd Authors
// SPDX-License-Identifier: Apache-2.0
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef ADFD_FFT_H_
#define ADFD_FFT_H_

#include <complex>
#include <cstddef>
#include <span>
#include <vector>

namespace adfd {

// In-place iterative radix-2 FFT for power-of-two sizes, double precision.
// A plan is immutable after construction and may be shared across threads.
class Fft {
 public:
  explicit Fft(std::size_t size);

  std::size_t size() const { return size_; }

  // X[k] = sum_n x[n] exp(-2 pi i k n / N)
  void Forward(std::span<std::complex<double>> data) const;
  // x[n] = (1/N) sum_k X[k] exp(+2 pi i k n / N)
  void Inverse(std::span<std::complex<double>> data) const;

 private:
  void Transform(std::span<std::complex<double>> data, bool inverse) const;

  std::size_t size_;
  std::vector<std::size_t> bit_reverse_;
  std::vector<std::complex<double>> twiddles_;  // exp(-2 pi i k / N), k < N/2
};

bool IsPowerOfTwo(std::size_t n);

}  // namespace adfd

#endif  // ADFD_FFT_H_
