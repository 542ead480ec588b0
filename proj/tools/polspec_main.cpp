#include <cstdio>
int main() { std::puts("polspec cli placeholder"); return 0; }
