#pragma once

#include "json.hpp"

namespace petc {

/// Insertion-ordered JSON; reports keep a stable field order.
using Json = nlohmann::ordered_json;

}  // namespace petc
