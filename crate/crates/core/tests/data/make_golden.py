# Writes golden_model.txt and golden_outputs.txt with an independent
# straight-line implementation (pure Python floats).
import math
import random

rng = random.Random(20240917)
dims = [4, 6, 5, 3]
acts = ["tanh", "tanh", "relu"]
f = lambda a, z: math.tanh(z) if a == "tanh" else max(z, 0.0)

in_off = [rng.uniform(-2, 2) for _ in range(4)]
in_scale = [rng.uniform(0.5, 3) for _ in range(4)]
out_off = [rng.uniform(-1, 1) for _ in range(3)]
out_scale = [rng.uniform(0.5, 2) for _ in range(3)]
layers = []
for k in range(3):
    w = [[rng.uniform(-1, 1) for _ in range(dims[k])] for _ in range(dims[k + 1])]
    b = [rng.uniform(-0.2, 0.5) for _ in range(dims[k + 1])]
    layers.append((w, b))

g = lambda xs: " ".join("%.16e" % x for x in xs)
with open("golden_model.txt", "w") as fh:
    fh.write("j2lambert-mlp 1\ninput_dim 4\noutput_dim 3\nhidden 6 5\n")
    fh.write("hidden_activation tanh\noutput_activation relu\n")
    fh.write("input_offset %s\ninput_scale %s\n" % (g(in_off), g(in_scale)))
    fh.write("input_log 0 1 0 0\n")
    fh.write("output_offset %s\noutput_scale %s\n" % (g(out_off), g(out_scale)))
    fh.write("output_log 0 0 1\n")
    for k, (w, b) in enumerate(layers):
        fh.write("layer %d %d %d %s\n" % (k, dims[k], dims[k + 1], acts[k]))
        for row in w:
            fh.write("w %s\n" % g(row))
        fh.write("b %s\n" % g(b))
    fh.write("end\n")

# Parameters as parsed back from the file.
rd = lambda s: float("%.16e" % s)
with open("golden_outputs.txt", "w") as fh:
    for _ in range(8):
        x = [rng.uniform(-5, 5) for _ in range(4)]
        x[1] = math.exp(rng.uniform(-6, 3))
        t = [math.log(v) if i == 1 else v for i, v in enumerate(x)]
        a = [(t[i] - rd(in_off[i])) / rd(in_scale[i]) for i in range(4)]
        for k, (w, b) in enumerate(layers):
            nxt = []
            for j in range(len(b)):
                z = rd(b[j])
                for i in range(len(a)):
                    z += rd(w[j][i]) * a[i]
                nxt.append(f(acts[k], z))
            a = nxt
        y = [a[j] * rd(out_scale[j]) + rd(out_off[j]) for j in range(3)]
        y[2] = math.exp(y[2])
        fh.write("%s | %s\n" % (g(x), g(y)))
