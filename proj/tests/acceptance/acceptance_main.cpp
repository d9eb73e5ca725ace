// Acceptance suite: one criterion per section, one PASS/FAIL line each.
#include <cstdio>

int main() {
  std::printf("FAIL acceptance suite not yet implemented\n");
  return 1;
}
