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


// Serves the built-in toy model over the concept-runner/1 stdio protocol.
//   ladc-toy-runner [N_CLASSES]
#include <cstdio>
#include <cstdlib>

#include "ladc/ladc.h"

int main(int argc, char** argv) {
  size_t n_classes = 3;
  if (argc > 1) {
    char* end = nullptr;
    const unsigned long v = std::strtoul(argv[1], &end, 10);
    if (!end || *end != '\0' || v < 2) {
      std::fprintf(stderr, "usage: %s [N_CLASSES >= 2]\n", argv[0]);
      return 1;
    }
    n_classes = v;
  }
  const ladc_status s = ladc_serve_toy_runner(n_classes);
  if (s != LADC_OK) {
    std::fprintf(stderr, "ladc-toy-runner: %s\n", ladc_last_error());
    return static_cast<int>(ladc_status_class(s));
  }
  return 0;
}
