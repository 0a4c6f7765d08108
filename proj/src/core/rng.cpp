#include "lowshot/rng.hpp"

#include <sstream>

#include "lowshot/errors.hpp"

namespace lowshot {

std::string serialize_rng(const Rng& rng) {
  std::ostringstream os;
  os << rng;
  return os.str();
}

Rng deserialize_rng(const std::string& state) {
  Rng rng;
  std::istringstream is(state);
  is >> rng;
  if (!is) throw Error(ErrorCode::SchemaMismatch, "unreadable RNG state");
  return rng;
}

}  // namespace lowshot
