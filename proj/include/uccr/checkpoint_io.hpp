// Copyright 2026 The UCCR Authors.
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

// Shared binary layout of model checkpoints:
//   magic line | uint64 header length | JSON header | float32 parameters
// The header carries a "params" array of {name, rows, cols} in set order.

#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <string_view>

#include "json.hpp"
#include "uccr/params.hpp"

namespace uccr {

// 64-bit FNV-1a; used for config hashes.
inline std::uint64_t fnv1a(std::string_view text) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 1099511628211ULL;
  }
  return h;
}

// Adds the "params" listing to `header` and writes the file. Throws DataError.
void write_checkpoint_file(const std::filesystem::path& path, const std::string& magic, nlohmann::json header,
                           const ParameterSet& params);

class CheckpointReader {
 public:
  // Reads magic and header. Throws DataError naming `what` on mismatch.
  CheckpointReader(const std::filesystem::path& path, const std::string& magic, const std::string& what);
  const nlohmann::json& header() const { return header_; }
  // Fills `params` from the data section after checking names and shapes.
  void read_into(ParameterSet& params);

 private:
  std::filesystem::path path_;
  std::ifstream in_;
  nlohmann::json header_;
};

}  // namespace uccr
