"""Inert stand-in for the framework used by behavior checks.

Every attribute, call and operator yields another placeholder whose repr is
the access path, so scripts run quickly and print deterministic output.
Subpackages are synthesised on import.
"""
import importlib.abc
import importlib.machinery
import sys

__version__ = "0.0.stub"


class _Auto:
    def __init__(self, path):
        object.__setattr__(self, "_path", path)

    def __getattr__(self, name):
        if name.startswith("__"):
            raise AttributeError(name)
        return _Auto(self._path + "." + name)

    def __call__(self, *args, **kwargs):
        return _Auto(self._path + "()")

    def __repr__(self):
        return "<" + self._path + ">"

    __str__ = __repr__

    def __format__(self, spec):
        return format(0.5, spec) if spec else repr(self)

    def __getitem__(self, key):
        return _Auto(self._path + "[]")

    def __iter__(self):
        return iter([_Auto(self._path + "[0]"), _Auto(self._path + "[1]")])

    def __len__(self):
        return 2

    def __bool__(self):
        return True

    def __float__(self):
        return 0.5

    def __int__(self):
        return 2

    __index__ = __int__

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        return False

    def __mro_entries__(self, bases):
        return (_base(self._path),)

    def _op(self, *other):
        return _Auto(self._path + "'")

    __add__ = __radd__ = __sub__ = __rsub__ = __mul__ = __rmul__ = _op
    __truediv__ = __rtruediv__ = __floordiv__ = __matmul__ = __rmatmul__ = __pow__ = _op
    __neg__ = __abs__ = _op
    __lt__ = __le__ = __gt__ = __ge__ = _op


_bases = {}


def _base(path):
    if path not in _bases:

        class Base:
            def __init__(self, *args, **kwargs):
                pass

            def __getattr__(self, name):
                if name.startswith("__"):
                    raise AttributeError(name)
                return _Auto(path + "." + name)

            def __call__(self, *args, **kwargs):
                if "build" in dir(type(self)) and not self.__dict__.get("_built"):
                    self._built = True
                    self.build(_Auto("input_shape"))
                if "call" in dir(type(self)):
                    return self.call(*args, **kwargs)
                return _Auto(path + "()")

        Base.__name__ = Base.__qualname__ = path.rsplit(".", 1)[-1]
        _bases[path] = Base
    return _bases[path]


def __getattr__(name):
    if name.startswith("__"):
        raise AttributeError(name)
    return _Auto("tensorflow." + name)


class _Finder(importlib.abc.MetaPathFinder, importlib.abc.Loader):
    def find_spec(self, fullname, path, target=None):
        if fullname.startswith("tensorflow."):
            return importlib.machinery.ModuleSpec(fullname, self, is_package=True)
        return None

    def create_module(self, spec):
        return None

    def exec_module(self, module):
        prefix = module.__name__

        def attr(name):
            if name.startswith("__"):
                raise AttributeError(name)
            return _Auto(prefix + "." + name)

        module.__getattr__ = attr
        module.__path__ = []


sys.meta_path.insert(0, _Finder())
