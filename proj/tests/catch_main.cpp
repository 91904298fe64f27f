// Catch2 v3 amalgamated translation unit; provides the default test main.
#include <catch2/catch_amalgamated.cpp>
