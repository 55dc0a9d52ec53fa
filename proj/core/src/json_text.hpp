#pragma once

// Hand-rendered JSON fragments for numeric payloads that must carry 17
// significant digits (nlohmann::json prints shortest round-trip forms).

#include <string>
#include <vector>

#include "trust_motion/common.hpp"

namespace trust_motion::json_text {

inline std::string quote(const std::string& s) {
  std::string out = "\"";
  for (const char c : s) {
    switch (c) {
      case '"': out += "\\\""; break;
      case '\\': out += "\\\\"; break;
      case '\n': out += "\\n"; break;
      case '\t': out += "\\t"; break;
      case '\r': out += "\\r"; break;
      default:
        if (static_cast<unsigned char>(c) < 0x20) {
          static const char* hex = "0123456789abcdef";
          out += "\\u00";
          out.push_back(hex[(c >> 4) & 0xF]);
          out.push_back(hex[c & 0xF]);
        } else {
          out.push_back(c);
        }
    }
  }
  out.push_back('"');
  return out;
}

inline std::string number(double v) {
  // JSON has no NaN; callers never pass one for fitted quantities.
  return format_real(v);
}

inline std::string vector(const Vector& v) {
  std::string out = "[";
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (i) out += ", ";
    out += number(v(i));
  }
  return out + "]";
}

inline std::string matrix(const Matrix& m, const std::string& indent) {
  std::string out = "[";
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    out += i ? ",\n" + indent + "  " : "\n" + indent + "  ";
    out += vector(m.row(i).transpose());
  }
  if (m.rows() > 0) out += "\n" + indent;
  return out + "]";
}

inline std::string strings(const std::vector<std::string>& items) {
  std::string out = "[";
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (i) out += ", ";
    out += quote(items[i]);
  }
  return out + "]";
}

template <typename Int>
std::string integers(const std::vector<Int>& items) {
  std::string out = "[";
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (i) out += ", ";
    out += std::to_string(items[i]);
  }
  return out + "]";
}

}  // namespace trust_motion::json_text
