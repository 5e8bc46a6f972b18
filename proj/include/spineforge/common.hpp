#pragma once

#include <string>

#include "spineforge/error.hpp"

namespace spineforge {

enum class Kind { simplicial, cubical };

inline std::string kind_name(Kind k) {
    return k == Kind::simplicial ? "simplicial" : "cubical";
}

inline Kind kind_from_name(const std::string& s) {
    if (s == "simplicial") return Kind::simplicial;
    if (s == "cubical") return Kind::cubical;
    throw Error("unknown kind '" + s + "'");
}

// Gluing multiplicity: d in the simplicial case, 2(d-1) in the cubical case.
inline int gluing_multiplicity(Kind k, int d) {
    return k == Kind::simplicial ? d : 2 * (d - 1);
}

}  // namespace spineforge
