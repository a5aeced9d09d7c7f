#ifndef EHW_MODEL_H
#define EHW_MODEL_H

#include <stdint.h>

/* layer kinds: 0 = conv2d, 1 = maxpool2d, 2 = fc */

#define NET_NUM_LAYERS 3
#define NET_INPUT_C 1
#define NET_INPUT_H 4
#define NET_INPUT_W 4
#define NET_FRAC_BITS 8
#define NET_OUTPUT_CLASSES 2

/* structure */
#define L0_KIND 0
#define L0_C_IN 1
#define L0_C_OUT 2
#define L0_K 3
#define L0_S 1
#define L0_P 1
#define L0_FRAC_BITS 8
#define L1_KIND 1
#define L1_W 2
#define L1_S 2
#define L2_KIND 2
#define L2_N_IN 8
#define L2_N_OUT 2
#define L2_FRAC_BITS 8

/* execution design */
#define NET_BATCH_S 3
#define L0_TILE_COUT 1
#define L0_TILE_H 2
#define L0_TILE_W 2
#define L0_LOOP_ORDER "h,cout,w"
#define L2_TILE_COUT 2
#define L2_TILE_H 1
#define L2_TILE_W 1
#define L2_LOOP_ORDER "cout,h,w"

/* weights, row-major (c_out, c_in, kh, kw) */

static const int16_t l0_w[18] = {
  -256, -219, -182, -145, -108, -71, -34, 3, 40, 77, 114, 151,
  188, 225, 262, 299, 336, 373,
};

static const int16_t l2_w[16] = {
  1000, 889, 778, 667, 556, 445, 334, 223, 112, 1, -110, -221,
  -332, -443, -554, -665,
};
static const int16_t l2_b[2] = {
  -3, 7,
};

#endif /* EHW_MODEL_H */
