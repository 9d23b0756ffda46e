#pragma once

#include "strb/harness.hpp"

namespace tools {

// Live and peak heap bytes seen by the replaced global operator new.
std::size_t live_bytes();
strb::MemoryProbe allocation_probe();

}  // namespace tools
