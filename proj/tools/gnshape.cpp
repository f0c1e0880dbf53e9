#include <cstdio>

int main() {
    std::puts("gnshape CLI placeholder");
    return 0;
}
