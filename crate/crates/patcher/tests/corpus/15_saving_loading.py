import tensorflow as tf
from tensorflow.keras.models import load_model
from tensorflow.keras import Model, Input
from tensorflow.keras.layers import Dense

inp = Input(shape=(3,))  # expect: tensorflow.keras.Input
layer = Dense(2)  # expect: tensorflow.keras.layers.Dense
out = layer(inp)  # expect: tensorflow.keras.layers.Dense.__call__
model = Model(inp, out)  # expect: tensorflow.keras.Model
model.compile(loss="mse")  # expect: tensorflow.keras.Model.compile
model.save("model.keras")  # expect: tensorflow.keras.Model.save
restored = load_model("model.keras")  # expect: tensorflow.keras.models.load_model
restored.summary()  # expect: tensorflow.keras.models.load_model.summary
loaded = tf.saved_model.load("exported")  # expect: tensorflow.saved_model.load
infer = loaded.signatures["serving_default"]
result = infer(inp)  # expect: tensorflow.saved_model.load.signatures[].__call__
