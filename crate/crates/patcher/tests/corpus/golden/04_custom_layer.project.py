from finejoule_shim import before_execution as before_execution_INSERTED_INTO_SCRIPT, after_execution as after_execution_INSERTED_INTO_SCRIPT
EXPERIMENT_FILE_PATH = 'experiments/04_custom_layer'
start_times_INSERTED_INTO_SCRIPT = before_execution_INSERTED_INTO_SCRIPT(experiment_file_path=EXPERIMENT_FILE_PATH, function_to_run='04_custom_layer')
import tensorflow as tf
from tensorflow.keras import layers


class Linear(layers.Layer):
    def __init__(self, units=32):
        super().__init__()
        self.units = units

    def build(self, input_shape):
        self.w = self.add_weight(shape=(input_shape[-1], self.units), initializer="random_normal", trainable=True)  # expect: tensorflow.keras.layers.Layer.add_weight
        self.b = self.add_weight(shape=(self.units,), initializer="zeros", trainable=True)  # expect: tensorflow.keras.layers.Layer.add_weight

    def call(self, inputs):
        y = tf.matmul(inputs, self.w)  # expect: tensorflow.matmul
        y = y + self.b
        return y


class Block(layers.Layer):
    def __init__(self):
        super().__init__()
        self.linear_1 = Linear(32)
        self.linear_2 = Linear(1)

    def call(self, inputs):
        x = self.linear_1(inputs)  # expect: tensorflow.keras.layers.Layer.__call__
        x = tf.nn.relu(x)  # expect: tensorflow.nn.relu
        y = self.linear_2(x)  # expect: tensorflow.keras.layers.Layer.__call__
        return y


x = tf.ones((2, 2))  # expect: tensorflow.ones
linear_layer = Linear(4)
y = linear_layer(x)  # expect: tensorflow.keras.layers.Layer.__call__
print(y)

block = Block()
out = block(x)  # expect: tensorflow.keras.layers.Layer.__call__
print(len(block.weights))
after_execution_INSERTED_INTO_SCRIPT(start_times=start_times_INSERTED_INTO_SCRIPT, experiment_file_path=EXPERIMENT_FILE_PATH, function_to_run='04_custom_layer', method_object=None, function_args=None, function_kwargs=None)
