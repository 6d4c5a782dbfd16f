import tensorflow as tf


class MyModel(tf.keras.Model):
    def __init__(self):
        super().__init__()
        self.conv1 = tf.keras.layers.Conv2D(32, 3, activation="relu")  # expect: tensorflow.keras.layers.Conv2D
        self.flatten = tf.keras.layers.Flatten()  # expect: tensorflow.keras.layers.Flatten
        self.d1 = tf.keras.layers.Dense(128, activation="relu")  # expect: tensorflow.keras.layers.Dense
        self.d2 = tf.keras.layers.Dense(10)  # expect: tensorflow.keras.layers.Dense

    def call(self, x):
        x = self.conv1(x)  # expect: tensorflow.keras.layers.Conv2D.__call__
        x = self.flatten(x)  # expect: tensorflow.keras.layers.Flatten.__call__
        x = self.d1(x)  # expect: tensorflow.keras.layers.Dense.__call__
        out = self.d2(x)  # expect: tensorflow.keras.layers.Dense.__call__
        return out


images = tf.zeros((4, 28, 28, 1))  # expect: tensorflow.zeros
labels = tf.constant([1, 2, 3, 4])  # expect: tensorflow.constant

model = MyModel()

model.compile(optimizer="adam", loss="sparse_categorical_crossentropy")  # expect: tensorflow.keras.Model.compile
model.fit(images, labels, epochs=1)  # expect: tensorflow.keras.Model.fit
predictions = model(images)  # expect: tensorflow.keras.Model.__call__
print(predictions)
