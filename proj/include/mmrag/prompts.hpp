// Copyright 2026 The mmrag Authors.
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

#include <string>

namespace mmrag::prompts {

// System prompts for the three generation agents. `few_shot` appends the
// worked response examples some open-weight models need.
std::string seeker_system(bool few_shot);
std::string inspector_system(bool few_shot);
std::string answer_system();

// Single-call generation over all retrieved pages.
std::string naive_system();

// Grading rubric: 1-5 agreement of a candidate with the reference answer.
std::string judge_system();

// Sent after a reply that could not be parsed.
std::string corrective(const std::string& problem);

}  // namespace mmrag::prompts
