"""Independent NumPy ETDRK4 run of the cosine case, written to cosine_t1.csv.

u_t + eta u u_x + mu^2 u_xxx = 0 on the periodic interval [-1, 1), 512 modes,
2/3-rule dealiasing, dt = 1e-4, contour-integral phi functions (64 points on a
full circle). Also prints the change from halving dt.
"""

import numpy as np

ETA, MU = 1.0, 0.05
N, A, B = 512, -1.0, 1.0


def run(dt, t_end=1.0):
    h = (B - A) / N
    x = A + h * np.arange(N)
    k = 2 * np.pi / (B - A) * np.arange(N // 2 + 1)
    mask = np.ones_like(k)
    mask[3 * np.arange(N // 2 + 1) > N] = 0.0
    mask[-1] = 0.0
    L = 1j * MU**2 * k**3
    g = -0.5j * ETA * k * mask

    E, E2 = np.exp(dt * L), np.exp(dt * L / 2)
    M = 64
    r = np.exp(2j * np.pi * (np.arange(1, M + 1) - 0.5) / M)
    LR = dt * L[:, None] + r[None, :]
    Q = dt * np.mean((np.exp(LR / 2) - 1) / LR, axis=1)
    f1 = dt * np.mean((-4 - LR + np.exp(LR) * (4 - 3 * LR + LR**2)) / LR**3, axis=1)
    f2 = dt * np.mean((2 + LR + np.exp(LR) * (-2 + LR)) / LR**3, axis=1)
    f3 = dt * np.mean((-4 - 3 * LR - LR**2 + np.exp(LR) * (4 - LR)) / LR**3, axis=1)

    def nl(v):
        u = np.fft.irfft(v, n=N)
        return g * np.fft.rfft(u * u)

    v = np.fft.rfft(np.cos(np.pi * x)) * mask
    steps = int(round(t_end / dt))
    for _ in range(steps):
        Nv = nl(v)
        a = E2 * v + Q * Nv
        Na = nl(a)
        b = E2 * v + Q * Na
        Nb = nl(b)
        c = E2 * a + Q * (2 * Nb - Nv)
        Nc = nl(c)
        v = E * v + Nv * f1 + 2 * (Na + Nb) * f2 + Nc * f3
    return x, np.fft.irfft(v, n=N)


if __name__ == "__main__":
    x, u = run(1e-4)
    _, u_half = run(5e-5)
    print("dt-halving change:", np.max(np.abs(u - u_half)))
    with open("cosine_t1.csv", "w") as f:
        f.write("x,u\n")
        for xi, ui in zip(x, u):
            f.write(f"{xi:.17g},{ui:.17g}\n")
