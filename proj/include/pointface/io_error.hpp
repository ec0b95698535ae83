// Copyright 2026 the pointface authors
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

#ifndef POINTFACE_IO_ERROR_HPP
#define POINTFACE_IO_ERROR_HPP

#include <stdexcept>

namespace pointface {

/// Malformed or missing input data; the CLI maps it to exit code 2.
struct FormatError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace pointface

#endif  // POINTFACE_IO_ERROR_HPP
