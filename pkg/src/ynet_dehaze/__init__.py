"""Y-net single-image dehazing with a wavelet-weighted SSIM loss."""
from .dwt import WaveletBands, WaveletPyramid, dwt2, dwt_pyramid, idwt2
from .metrics import SsimParams, gaussian_window, l2_loss, psnr, ssim, ssim_loss, ssim_map
from .model import YNet, YNetConfig, build, count_params
from .trainer import TrainConfig, TrainLog, resume, train
from .wssim import LossVariant, WeightSchedule, total_loss, weight_schedule, wssim_loss

__version__ = "0.1.0"
