// Copyright 2026 The gibbs-sampler Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <stdexcept>
#include <string>

namespace gibbs {

// Base of every error raised by the library.
class Error : public std::runtime_error {
 public:
    using std::runtime_error::runtime_error;
};

#define GIBBS_DEFINE_ERROR(Name)                   \
    class Name : public Error {                    \
     public:                                       \
        explicit Name(const std::string& what_arg) \
            : Error(#Name ": " + what_arg) {}      \
    };

GIBBS_DEFINE_ERROR(NotHermitian)
GIBBS_DEFINE_ERROR(DimensionMismatch)
GIBBS_DEFINE_ERROR(EigensolverFailure)
GIBBS_DEFINE_ERROR(InvalidLocality)
GIBBS_DEFINE_ERROR(InvalidArgument)
GIBBS_DEFINE_ERROR(NonUniqueSteadyState)
GIBBS_DEFINE_ERROR(SingularGibbs)
GIBBS_DEFINE_ERROR(DegenerateChain)
GIBBS_DEFINE_ERROR(StepUnderflow)
GIBBS_DEFINE_ERROR(InsufficientDecay)
GIBBS_DEFINE_ERROR(DegenerateSpectrum)
GIBBS_DEFINE_ERROR(ConfigError)
GIBBS_DEFINE_ERROR(ResourceCeiling)

#undef GIBBS_DEFINE_ERROR

}  // namespace gibbs
