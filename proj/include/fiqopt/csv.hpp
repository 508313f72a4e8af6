#pragma once

#include <string>
#include <vector>

namespace fiqopt {

// Splits one CSV record on commas. The formats used here never quote fields,
// so identifiers must not contain commas.
inline std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> fields;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    if (comma == std::string::npos) {
      fields.push_back(line.substr(start));
      return fields;
    }
    fields.push_back(line.substr(start, comma - start));
    start = comma + 1;
  }
}

// Strips one trailing '\r' so files with Windows line endings still load.
inline void strip_cr(std::string& line) {
  if (!line.empty() && line.back() == '\r') line.pop_back();
}

}  // namespace fiqopt
