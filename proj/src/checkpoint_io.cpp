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

#include "uccr/checkpoint_io.hpp"

#include <cstdint>

#include "uccr/errors.hpp"

namespace uccr {

using nlohmann::json;

void write_checkpoint_file(const std::filesystem::path& path, const std::string& magic, json header,
                           const ParameterSet& params) {
  json listing = json::array();
  for (const auto& [name, v] : params.items()) listing.push_back({{"name", name}, {"rows", v.rows()}, {"cols", v.cols()}});
  header["params"] = listing;
  const std::string text = header.dump();

  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write checkpoint " + path.string());
  out.write(magic.data(), static_cast<std::streamsize>(magic.size()));
  const std::uint64_t n = text.size();
  out.write(reinterpret_cast<const char*>(&n), sizeof(n));
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  for (const auto& [name, v] : params.items()) {
    const Eigen::MatrixXf f = v.value().cast<float>();
    out.write(reinterpret_cast<const char*>(f.data()), static_cast<std::streamsize>(f.size() * sizeof(float)));
  }
  if (!out) throw DataError("failed writing checkpoint " + path.string());
}

CheckpointReader::CheckpointReader(const std::filesystem::path& path, const std::string& magic,
                                   const std::string& what)
    : path_(path), in_(path, std::ios::binary) {
  if (!in_) throw DataError("cannot read checkpoint " + path.string());
  std::string got(magic.size(), '\0');
  in_.read(got.data(), static_cast<std::streamsize>(got.size()));
  if (!in_ || got != magic) throw DataError(path.string() + ": not a " + what + " checkpoint");
  std::uint64_t n = 0;
  in_.read(reinterpret_cast<char*>(&n), sizeof(n));
  if (!in_ || n > (1ULL << 30)) throw DataError(path.string() + ": corrupt header length");
  std::string text(n, '\0');
  in_.read(text.data(), static_cast<std::streamsize>(n));
  if (!in_) throw DataError(path.string() + ": truncated header");
  try {
    header_ = json::parse(text);
  } catch (const json::exception& e) {
    throw DataError(path.string() + ": bad header: " + e.what());
  }
  if (!header_.contains("params") || !header_["params"].is_array()) {
    throw DataError(path.string() + ": header lacks a parameter listing");
  }
}

void CheckpointReader::read_into(ParameterSet& params) {
  const auto& names = header_.at("params");
  const auto& items = params.items();
  if (names.size() != items.size()) throw DataError(path_.string() + ": parameter count mismatch");
  for (std::size_t k = 0; k < items.size(); ++k) {
    const auto& [name, v] = items[k];
    try {
      if (names[k].at("name").get<std::string>() != name || names[k].at("rows").get<ag::Index>() != v.rows() ||
          names[k].at("cols").get<ag::Index>() != v.cols()) {
        throw DataError(path_.string() + ": parameter '" + name + "' does not match the header");
      }
    } catch (const json::exception& e) {
      throw DataError(path_.string() + ": bad parameter listing: " + e.what());
    }
    Eigen::MatrixXf f(v.rows(), v.cols());
    in_.read(reinterpret_cast<char*>(f.data()), static_cast<std::streamsize>(f.size() * sizeof(float)));
    if (!in_) throw DataError(path_.string() + ": truncated parameter data at '" + name + "'");
    ag::Var handle = v;
    handle.mutable_value() = f.cast<double>();
  }
}

}  // namespace uccr
