"""Train the float digit-classifier fixture on the synthetic stroke set.

Run from the repo root after installing the package:

    python3 fixtures/train_lenet.py --out fixtures/lenet_weights.nt

Training is deterministic (fixed torch seed, fixed data streams), so the
committed weight file can be regenerated bit-for-bit. Requires torch,
which is only a fixture-time dependency; the simulator itself never
imports it.
"""

from __future__ import annotations

import argparse

import numpy as np
import torch
from torch import nn

from imacsim.synth import digit_dataset
from imacsim.tensorfile import save_tensors


class Net(nn.Module):
    # mirrors the simulator's builtin 5-layer topology exactly
    def __init__(self):
        super().__init__()
        self.conv1 = nn.Conv2d(1, 6, 5)
        self.conv2 = nn.Conv2d(6, 16, 5)
        self.fc1 = nn.Linear(400, 120)
        self.fc2 = nn.Linear(120, 84)
        self.fc3 = nn.Linear(84, 10)
        self.pool = nn.MaxPool2d(2, 2)
        self.act = nn.ReLU()

    def forward(self, x):
        x = self.pool(self.act(self.conv1(x)))
        x = self.pool(self.act(self.conv2(x)))
        x = torch.flatten(x, 1)
        x = self.act(self.fc1(x))
        x = self.act(self.fc2(x))
        return self.fc3(x)


def padded(images: np.ndarray) -> np.ndarray:
    # 28x28 -> centered 32x32, matching the dataset loader
    out = np.zeros((images.shape[0], 1, 32, 32), dtype=np.float32)
    out[:, 0, 2:30, 2:30] = images.astype(np.float32) / 255.0
    return out


def main() -> None:
    ap = argparse.ArgumentParser()
    ap.add_argument("--out", default="fixtures/lenet_weights.nt")
    ap.add_argument("--n-train", type=int, default=20000)
    ap.add_argument("--n-test", type=int, default=2000)
    ap.add_argument("--epochs", type=int, default=6)
    ap.add_argument("--batch", type=int, default=128)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    torch.manual_seed(args.seed)
    torch.use_deterministic_algorithms(True)

    train_x, train_y = digit_dataset(args.n_train, seed=args.seed, split="train")
    test_x, test_y = digit_dataset(args.n_test, seed=args.seed, split="test")
    tx = torch.from_numpy(padded(train_x))
    ty = torch.from_numpy(train_y.astype(np.int64))
    vx = torch.from_numpy(padded(test_x))
    vy = torch.from_numpy(test_y.astype(np.int64))

    model = Net()
    opt = torch.optim.Adam(model.parameters(), lr=1e-3)
    loss_fn = nn.CrossEntropyLoss()

    n = tx.shape[0]
    for epoch in range(args.epochs):
        model.train()
        perm = torch.randperm(n, generator=torch.Generator().manual_seed(args.seed + epoch))
        total = 0.0
        for lo in range(0, n, args.batch):
            idx = perm[lo : lo + args.batch]
            opt.zero_grad()
            loss = loss_fn(model(tx[idx]), ty[idx])
            loss.backward()
            opt.step()
            total += float(loss.detach()) * idx.numel()
        model.eval()
        with torch.no_grad():
            acc = float((model(vx).argmax(1) == vy).float().mean())
        print(f"epoch {epoch}: loss {total / n:.4f}  val acc {acc:.4f}")

    tensors = {}
    for name, tensor in model.state_dict().items():
        tensors[name] = tensor.detach().numpy().astype(np.float32)
    save_tensors(args.out, tensors)
    print(f"saved {len(tensors)} tensors to {args.out}")


if __name__ == "__main__":
    main()
