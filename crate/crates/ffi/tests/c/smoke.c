#include <math.h>
#include <stdio.h>
#include <stdlib.h>

#include "xerm.h"

#define CHECK(cond)                                                    \
  do {                                                                 \
    if (!(cond)) {                                                     \
      fprintf(stderr, "%s:%d: check failed: %s\n", __FILE__, __LINE__, \
              #cond);                                                  \
      return 1;                                                        \
    }                                                                  \
  } while (0)

int main(void) {
  double w_f, w_cf;
  CHECK(xerm_compute_weights(3.0, 1.0, 2.0, &w_f, &w_cf) == XERM_STATUS_OK);
  CHECK(fabs(w_f - 0.9) < 1e-12 && fabs(w_f + w_cf - 1.0) < 1e-12);

  uint64_t counts[100];
  CHECK(xerm_decay_counts(100, 100, 0.01, counts) == XERM_STATUS_OK);
  CHECK(counts[0] == 100 && counts[99] == 1);

  XermModel *model = NULL;
  CHECK(xerm_model_init(XERM_ARCH_MLP1, 3, 5, 4, true, 7, &model) ==
        XERM_STATUS_OK);
  size_t dims, hidden, classes;
  CHECK(xerm_model_shape(model, &dims, &hidden, &classes) == XERM_STATUS_OK);
  CHECK(dims == 3 && hidden == 5 && classes == 4);

  size_t size = 0;
  CHECK(xerm_model_save(model, NULL, 0, &size) == XERM_STATUS_OK);
  uint8_t *buf = malloc(size);
  CHECK(xerm_model_save(model, buf, size, &size) == XERM_STATUS_OK);
  XermModel *copy = NULL;
  CHECK(xerm_model_load(buf, size, &copy) == XERM_STATUS_OK);

  double x[3] = {0.5, -1.0, 2.0};
  double a[4], b[4];
  CHECK(xerm_model_logits(model, x, 3, a, 4) == XERM_STATUS_OK);
  CHECK(xerm_model_logits(copy, x, 3, b, 4) == XERM_STATUS_OK);
  for (int i = 0; i < 4; i++) CHECK(a[i] == b[i]);

  uint64_t train_counts[4] = {100, 30, 10, 3};
  XermPrior *prior = NULL;
  CHECK(xerm_prior_from_counts(train_counts, 4, &prior) == XERM_STATUS_OK);
  double p[4], total = 0.0;
  CHECK(xerm_model_balanced_proba(model, prior, 1.0, x, 3, p, 4) ==
        XERM_STATUS_OK);
  for (int i = 0; i < 4; i++) total += p[i];
  CHECK(fabs(total - 1.0) < 1e-12);

  buf[0] = 'Y';
  XermModel *bad = NULL;
  CHECK(xerm_model_load(buf, size, &bad) == XERM_STATUS_CORRUPT_CHECKPOINT);
  char msg[256];
  CHECK(xerm_last_error(msg, sizeof msg) > 0);

  xerm_prior_free(prior);
  xerm_model_free(copy);
  xerm_model_free(model);
  free(buf);
  puts("c smoke ok");
  return 0;
}
