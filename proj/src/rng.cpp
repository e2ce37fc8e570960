#include "mabicap/rng.hpp"

#include <locale>
#include <sstream>

#include "mabicap/errors.hpp"

namespace mabicap {

std::string Rng::save_state() const {
  std::ostringstream os;
  os.imbue(std::locale::classic());
  os << engine_;
  return os.str();
}

void Rng::load_state(const std::string& state) {
  std::istringstream is(state);
  is.imbue(std::locale::classic());
  is >> engine_;
  if (is.fail()) throw FormatError("rng: unparseable engine state");
}

}  // namespace mabicap
