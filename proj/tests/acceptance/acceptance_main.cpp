// Acceptance suite placeholder; criteria are filled in alongside the modules.
#include <cstdio>

int main() {
  std::puts("acceptance suite not yet populated");
  return 1;
}
