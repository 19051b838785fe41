#pragma once

#include <string_view>

// Text tables shipped under data/ and compiled into the library.
namespace dect::builtin {

std::string_view materials_table();
std::string_view spectrum_95kvp();
std::string_view spectrum_130kvp();

}  // namespace dect::builtin
