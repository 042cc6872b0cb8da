"""Application harnesses: image filtering and a quantised MNIST perceptron."""
from .images import (GrayImage, add_gaussian_noise, convolve_reference, filter_bench,
                     gaussian_filter, load_fixture_set, psnr, read_pgm, write_pgm)
from .lut import MultLut, load_lut
from .mlp import (QuantLayer, QuantMlp, accumulator_width, adder_width, accuracy, mac_accumulate,
                  load_test_set, mlp_infer, mlp_predict, mlp_scores, mlp_scores_reference,
                  nn_bench, small_weight_fraction, weights_histogram)
