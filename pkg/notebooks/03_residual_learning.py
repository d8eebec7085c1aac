"""
Learning the residual instead of the whole distortion
=====================================================

A shallow network learns either d = y - x from delayed-tap features, or only
h = y - G after a static fit. The second pipeline needs fewer features and
ends closer to the target. The last cell runs indirect-learning
predistortion on the reference amplifier.
"""

import warnings

import numpy as np

from nldecomp.learner import (ARVTDNN, SRTDNN, TrainConfig, full_learning, indirect_dpd, predict_full,
                              predict_residual, reference_drive, reference_pa, residual_learning)
from nldecomp.learner.compare import CompareConfig, make_record, split_rows
from nldecomp.learner.metrics import nmse_db

warnings.simplefilter("ignore", RuntimeWarning)

cfg = CompareConfig()
x, y = make_record(0, cfg)
train, hold = split_rows(len(x), 16, 0.2, 0)
train = np.sort(train)
tc = TrainConfig(max_iters=3000)

m_full, t_full = full_learning(x, y, ARVTDNN, tc, train)
static, m_res, t_res = residual_learning(x, y, 7, SRTDNN, tc, train)
pf, pr = predict_full(m_full, x).samples, predict_residual(static, m_res, x).samples
ys = y.samples
print(f"{ARVTDNN.name}: {t_full.param_count} params, {t_full.mac_per_inference} MACs, "
      f"holdout NMSE {nmse_db(pf[hold], ys[hold]):.2f} dB")
print(f"{SRTDNN.name}:  {t_res.param_count} params, {t_res.mac_per_inference} MACs, "
      f"holdout NMSE {nmse_db(pr[hold], ys[hold]):.2f} dB")

# predistortion: fit a post-inverse on the amplifier output, then use it in front
drive = reference_drive(42)
for modeler in ("Residual", "Full"):
    m = indirect_dpd(drive, reference_pa(42), modeler).metrics()
    print(f"{modeler:8s} ACLR {m['aclr_before_dbc']:.1f} -> {m['aclr_after_dbc']:.1f} dBc, "
          f"EVM {m['evm_before_db']:.1f} -> {m['evm_after_db']:.1f} dB")
