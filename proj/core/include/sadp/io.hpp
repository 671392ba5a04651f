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

#ifndef SADP_IO_HPP
#define SADP_IO_HPP

#include <map>
#include <string>
#include <vector>

namespace sadp {

std::vector<std::string> read_lines(const std::string& path);
std::string read_file(const std::string& path);
void write_file(const std::string& path, const std::string& content);

std::string trim(const std::string& s);
std::string to_lower(std::string s);
std::vector<std::string> split(const std::string& s, char sep);

// Lowercase alphanumeric tokens, split on everything else.
std::vector<std::string> tokenize(const std::string& text);

// Shortest decimal representation that round-trips, so CSV output is both
// readable and byte-stable across runs.
std::string fmt_double(double v);

// key=value files ('#' starts a comment, blank lines ignored).
std::map<std::string, std::string> read_kv_file(const std::string& path);
void write_kv_file(const std::string& path,
                   const std::map<std::string, std::string>& kv,
                   const std::string& header_comment = "");

}  // namespace sadp

#endif  // SADP_IO_HPP
