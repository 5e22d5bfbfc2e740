from setuptools import Extension, setup

setup(
    ext_modules=[
        Extension("bskiplist._rwlock", ["src/bskiplist/_rwlock.c"], optional=True),
    ],
)
