// Copyright 2026 The nbhd Authors. All Rights Reserved.
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

#ifndef NBHD_SRC_HTTP_UTIL_H_
#define NBHD_SRC_HTTP_UTIL_H_

#include <string>
#include <string_view>

namespace nbhd::internal {

struct SplitUrl {
  std::string origin;  // scheme://host[:port]
  std::string path;    // /path?query, at least "/"
};

SplitUrl SplitHttpUrl(std::string_view url);

// Replaces every "{name}" with `value`.
std::string ReplaceAll(std::string text, std::string_view from,
                       std::string_view to);

std::string UrlEncode(std::string_view s);

}  // namespace nbhd::internal

#endif  // NBHD_SRC_HTTP_UTIL_H_
