#include <cstdio>

int main() {
  std::puts("rbl: subcommands not wired up yet");
  return 2;
}
