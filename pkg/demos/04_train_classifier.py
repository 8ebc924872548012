"""Train the built-in classifier on the synthetic two-class task.

Class 0 is a sinusoid at one frequency, class 1 a frequency-shifted and
randomly time-warped variant; both get additive noise.  A small 1-D CNN
separates them easily.  Everything is plain numpy -- the forward and backward
passes are written out by hand in dtwadv.nn.
"""

import os
import tempfile

from dtwadv.nn import (
    Classifier,
    TrainConfig,
    cnn_spec,
    load_checkpoint,
    save_checkpoint,
    train,
)
from dtwadv.signal import split, synth_two_class

ds = split(synth_two_class(200, 3, 32, seed=1), (0.6, 0.2, 0.2), seed=42)
print(f"dataset: {ds.n_examples} examples, {ds.n_channels} channels, T={ds.length}")
print(f"splits : train {ds.subset('train').n_examples}, "
      f"val {ds.subset('val').n_examples}, test {ds.subset('test').n_examples}")

spec = cnn_spec(3, 32, 2)
print(f"\narchitecture ({spec.param_count} parameters):")
for layer in spec.layers:
    print(f"  {layer}")

model, history = train(Classifier(spec, seed=0), ds, TrainConfig(epochs=30, seed=0))
for st in history[::6] + [history[-1]]:
    print(f"epoch {st.epoch:3d}  loss {st.loss:.4f}  train acc {st.accuracy:.3f}")

test = ds.subset("test")
acc = (model.predict_batch(test.X) == test.y).mean()
print(f"\ntest accuracy: {acc:.3f}")

# checkpoints are a tiny self-describing binary format
path = os.path.join(tempfile.mkdtemp(), "model.bin")
save_checkpoint(model, path)
again = load_checkpoint(path)
print(f"checkpoint round-trip OK: {os.path.getsize(path)} bytes, "
      f"same predictions: {(again.predict_batch(test.X) == model.predict_batch(test.X)).all()}")
