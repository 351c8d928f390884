"""The multi-scale fusion shape contract for a 512x512 input.

Two channels see the image at full and half resolution; maps of equal scale
are concatenated and progressively up-sampled back to stride 4.
"""

import numpy as np

from textshape import netplan

plan = netplan.shape_plan(512, 512, n_channels=2)
print(netplan.format_plan(plan))
print()

first = plan.fusion_steps[0]
print(f"first fusion joins {len(first.inputs)} maps at {first.inputs[0][1]}")

# The numeric upsampler realizes the "^2" inputs the plan promises.
deep = np.random.default_rng(1).random(plan.channels[1].stages["conv5"])
up = netplan.upsample2x(deep)
print(f"ch2.conv5 {deep.shape} -> upsampled {up.shape}, "
      f"value range preserved: [{deep.min():.3f}, {deep.max():.3f}] vs "
      f"[{up.min():.3f}, {up.max():.3f}]")

try:
    netplan.shape_plan(520, 512, 2)
except netplan.ShapePlanError as exc:
    print(f"misaligned input is rejected: {exc}")
