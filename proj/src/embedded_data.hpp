#pragma once

#include <string_view>

// Contents of the files under data/, compiled in so the library works
// without a data directory.
namespace soapseg::embedded {

std::string_view default_lexicon();
std::string_view default_abbreviations();
std::string_view default_stopwords();

}  // namespace soapseg::embedded
