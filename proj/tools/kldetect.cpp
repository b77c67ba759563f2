#include <iostream>

int main() {
  std::cout << "kldetect CLI placeholder\n";
  return 0;
}
