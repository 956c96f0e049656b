#include "loop/util/hash.hpp"

#include <cstdio>

namespace loop {

std::string hex_digest(std::string_view data) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a64(data)));
    return buf;
}

}  // namespace loop
