// Copyright 2024-2026 The tggsync Authors
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

#ifndef TGGSYNC_JSON_IO_HPP
#define TGGSYNC_JSON_IO_HPP

#include <string>
#include <utility>
#include <vector>

#include "tggsync/sync.hpp"

namespace tggsync {

// File formats are documented in docs/formats.md. Loaders throw InputError
// on malformed input and run the structural checks of the loaded artifact.

struct TGGFile {
  Metamodel mm;
  std::vector<Rule> rules;
};

TGGFile load_tgg_file(const std::string& path);
TGGFile parse_tgg(const std::string& jsonText);

TripleGraph load_model_file(const Metamodel& mm, const std::string& path);
TripleGraph parse_model(const Metamodel& mm, const std::string& jsonText);
std::string model_to_json(const TripleGraph& g);

Delta load_delta_file(const Metamodel& mm, const std::string& path);
Delta parse_delta(const Metamodel& mm, const std::string& jsonText);

std::string report_to_json(const SyncReport& r);

std::string read_file(const std::string& path);
void write_file(const std::string& path, const std::string& content);

}  // namespace tggsync

#endif  // TGGSYNC_JSON_IO_HPP
