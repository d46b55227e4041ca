/* Compiled as C to keep the public header free of C++. */
#include <ccepc/ccepc.h>

#include <stdio.h>

int main(void) {
  const double eig[] = {8.0, 4.0, 1.0, 0.5};
  int k_er = -1, k_gr = -1;
  if (ccepc_ahn_horenstein(eig, 4, 2, &k_er, &k_gr) != CCEPC_OK) return 1;
  if (k_er != 2) return 1;
  printf("ccepc %s from C: k_er=%d\n", ccepc_version(), k_er);
  return 0;
}
