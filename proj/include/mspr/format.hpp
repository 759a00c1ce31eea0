#ifndef MSPR_FORMAT_HPP
#define MSPR_FORMAT_HPP

#include <sstream>
#include <string>

namespace mspr {

/// Joins the arguments through an ostringstream.
template <class... Args>
std::string format(Args&&... args) {
  std::ostringstream out;
  (out << ... << args);
  return out.str();
}

}  // namespace mspr

#endif  // MSPR_FORMAT_HPP
