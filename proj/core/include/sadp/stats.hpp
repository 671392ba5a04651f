// Copyright 2026 The sadp authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//    http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef SADP_STATS_HPP
#define SADP_STATS_HPP

#include <span>
#include <vector>

namespace sadp {

double mean(std::span<const double> xs);
// Sample standard deviation (n-1 denominator); 0 for fewer than 2 samples.
double stddev(std::span<const double> xs);

// Unpaired one-tailed Welch t-test for H1: mean(a) > mean(b).
// Assumes approximately normal per-group means and unequal variances
// (Welch-Satterthwaite degrees of freedom). Returns the one-sided p-value.
double welch_one_tailed_p(std::span<const double> a, std::span<const double> b);

// CDF of Student's t distribution with df degrees of freedom.
double student_t_cdf(double t, double df);

}  // namespace sadp

#endif  // SADP_STATS_HPP
