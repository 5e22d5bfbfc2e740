/* Writer-preferring reader-writer lock backed by pthread_rwlock_t.
 *
 * Uncontended acquisitions use the try-lock fast path without dropping the
 * GIL; contended ones release the GIL while blocking. A lock must be
 * released by the thread that acquired it.
 */
#define PY_SSIZE_T_CLEAN
#include <Python.h>
#include <errno.h>
#include <pthread.h>

typedef struct {
    PyObject_HEAD
    pthread_rwlock_t lock;
    int initialized;
    int writing;
    Py_ssize_t readers;
} RWLockObject;

static PyObject *
RWLock_new(PyTypeObject *type, PyObject *args, PyObject *kwds)
{
    RWLockObject *self = (RWLockObject *)type->tp_alloc(type, 0);
    if (self == NULL)
        return NULL;
    pthread_rwlockattr_t attr;
    pthread_rwlockattr_init(&attr);
#ifdef PTHREAD_RWLOCK_PREFER_WRITER_NONRECURSIVE_NP
    pthread_rwlockattr_setkind_np(&attr, PTHREAD_RWLOCK_PREFER_WRITER_NONRECURSIVE_NP);
#endif
    int rc = pthread_rwlock_init(&self->lock, &attr);
    pthread_rwlockattr_destroy(&attr);
    if (rc != 0) {
        Py_DECREF(self);
        errno = rc;
        return PyErr_SetFromErrno(PyExc_OSError);
    }
    self->initialized = 1;
    self->writing = 0;
    self->readers = 0;
    return (PyObject *)self;
}

static void
RWLock_dealloc(RWLockObject *self)
{
    if (self->initialized)
        pthread_rwlock_destroy(&self->lock);
    Py_TYPE(self)->tp_free((PyObject *)self);
}

static PyObject *
lock_failed(int rc)
{
    errno = rc;
    return PyErr_SetFromErrno(PyExc_OSError);
}

static PyObject *
RWLock_acquire_read(RWLockObject *self, PyObject *Py_UNUSED(ignored))
{
    if (pthread_rwlock_tryrdlock(&self->lock) != 0) {
        int rc;
        Py_BEGIN_ALLOW_THREADS
        rc = pthread_rwlock_rdlock(&self->lock);
        Py_END_ALLOW_THREADS
        if (rc != 0)
            return lock_failed(rc);
    }
    self->readers++;
    Py_RETURN_NONE;
}

static PyObject *
RWLock_acquire_write(RWLockObject *self, PyObject *Py_UNUSED(ignored))
{
    if (pthread_rwlock_trywrlock(&self->lock) != 0) {
        int rc;
        Py_BEGIN_ALLOW_THREADS
        rc = pthread_rwlock_wrlock(&self->lock);
        Py_END_ALLOW_THREADS
        if (rc != 0)
            return lock_failed(rc);
    }
    self->writing = 1;
    Py_RETURN_NONE;
}

static PyObject *
RWLock_release(RWLockObject *self, PyObject *Py_UNUSED(ignored))
{
    if (self->writing) {
        self->writing = 0;
    }
    else if (self->readers > 0) {
        self->readers--;
    }
    else {
        PyErr_SetString(PyExc_RuntimeError, "release of an unheld RWLock");
        return NULL;
    }
    int rc = pthread_rwlock_unlock(&self->lock);
    if (rc != 0)
        return lock_failed(rc);
    Py_RETURN_NONE;
}

static PyObject *
RWLock_get_write_locked(RWLockObject *self, void *closure)
{
    return PyBool_FromLong(self->writing);
}

static PyObject *
RWLock_get_reader_count(RWLockObject *self, void *closure)
{
    return PyLong_FromSsize_t(self->readers);
}

static PyMethodDef RWLock_methods[] = {
    {"acquire_read", (PyCFunction)RWLock_acquire_read, METH_NOARGS, "Acquire in shared mode."},
    {"acquire_write", (PyCFunction)RWLock_acquire_write, METH_NOARGS, "Acquire in exclusive mode."},
    {"release", (PyCFunction)RWLock_release, METH_NOARGS, "Release whichever mode is held."},
    {NULL}
};

static PyGetSetDef RWLock_getset[] = {
    {"write_locked", (getter)RWLock_get_write_locked, NULL, "True while held in write mode.", NULL},
    {"reader_count", (getter)RWLock_get_reader_count, NULL, "Number of read holders.", NULL},
    {NULL}
};

static PyTypeObject RWLockType = {
    PyVarObject_HEAD_INIT(NULL, 0)
    .tp_name = "bskiplist._rwlock.RWLock",
    .tp_doc = "Writer-preferring reader-writer lock (pthread_rwlock_t).",
    .tp_basicsize = sizeof(RWLockObject),
    .tp_itemsize = 0,
    .tp_flags = Py_TPFLAGS_DEFAULT | Py_TPFLAGS_BASETYPE,
    .tp_new = RWLock_new,
    .tp_dealloc = (destructor)RWLock_dealloc,
    .tp_methods = RWLock_methods,
    .tp_getset = RWLock_getset,
};

static struct PyModuleDef rwlockmodule = {
    PyModuleDef_HEAD_INIT,
    .m_name = "bskiplist._rwlock",
    .m_doc = "pthread reader-writer lock for B-skiplist nodes.",
    .m_size = -1,
};

PyMODINIT_FUNC
PyInit__rwlock(void)
{
    if (PyType_Ready(&RWLockType) < 0)
        return NULL;
    PyObject *m = PyModule_Create(&rwlockmodule);
    if (m == NULL)
        return NULL;
    Py_INCREF(&RWLockType);
    if (PyModule_AddObject(m, "RWLock", (PyObject *)&RWLockType) < 0) {
        Py_DECREF(&RWLockType);
        Py_DECREF(m);
        return NULL;
    }
    return m;
}
