// Copyright 2026 The ladc Authors.
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

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

namespace ladc {

struct ReportOptions {
  std::size_t max_examples = 8;
  // Attenuation of non-concept pixels; the extraction config value if unset.
  std::optional<double> lambda;
  std::size_t grid_columns = 4;
};

// Renders concepts.json plus, per concept, the top examples (by mask area),
// their 1-bit masks and a grid image under concepts/concept_XX/. Requires a
// completed extraction and scoring in `out_dir`. Returns the written JSON.
nlohmann::json generate_report(const std::filesystem::path& out_dir,
                               const ReportOptions& options = {});

// Structural check of a concepts.json document against the published
// schema (schemas/concepts.schema.json). Returns the list of violations.
std::vector<std::string> validate_concepts_json(const nlohmann::json& doc);

}  // namespace ladc
