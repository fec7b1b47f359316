import logging
from concurrent.futures import ProcessPoolExecutor
from concurrent.futures.process import BrokenProcessPool

logger = logging.getLogger(__name__)


class PoolError(ValueError):
    pass


class Control:
    """
    Abstraction layer for running replica batches on a pool of worker
    processes. With one worker everything runs in the calling process.
    """

    RUNNING = 1
    JEOPARDY = 0
    STOPPED = -1

    def __init__(self, workers=1, name='replicas'):
        """
        Initialize the control for a worker pool.
        :param workers: number of worker processes (1 = in-process)
        :param name: label used in log messages
        """
        if isinstance(workers, bool) or not isinstance(workers, int) or workers < 1:
            raise ValueError(f'{__class__.__name__} needs a positive worker count: {workers!r}')
        self.workers = workers
        self.name = name
        self.executor = None
        self.started = False
        self.broken = False

    def get_name(self):
        return self.name

    def get(self, prop):
        """
        Get properties of the initialized control instance
        :return: None if undefined or non-existent
        """
        return getattr(self, prop, None)

    def start(self):
        """
        Start the pool if it is not already running.
        """
        if self.get_status() == self.STOPPED:
            if self.workers > 1:
                self.executor = ProcessPoolExecutor(max_workers=self.workers)
                logger.info('%s: started %d workers', self.name, self.workers)
            self.started = True
            self.broken = False
        return self.get_status()

    def stop(self):
        """
        Stop the pool, cancelling tasks that have not started.
        """
        if self.executor is not None:
            self.executor.shutdown(wait=True, cancel_futures=True)
            logger.info('%s: stopped workers', self.name)
        self.executor = None
        self.started = False
        return self.get_status()

    def get_status(self):
        """
        RUNNING : started and able to accept tasks.
        JEOPARDY : started but a worker died; tasks will fail.
        STOPPED : not started.
        :return: RUNNING, JEOPARDY, STOPPED
        """
        if not self.started:
            return self.STOPPED
        if self.broken:
            return self.JEOPARDY
        return self.RUNNING

    def is_running(self):
        return self.get_status() != self.STOPPED

    def map(self, fn, tasks):
        """
        Apply fn to every task. Results come back in task order whatever the
        scheduling, so reductions over them are deterministic.
        :param fn: picklable top-level function
        :param tasks: iterable of picklable arguments
        :return: list of results
        """
        tasks = list(tasks)
        if self.executor is None:
            return [fn(task) for task in tasks]
        if self.broken:
            raise PoolError(f'{self.name}: worker pool is broken')
        try:
            return list(self.executor.map(fn, tasks))
        except BrokenProcessPool as exc:
            self.broken = True
            logger.error('%s: a worker process died', self.name)
            raise PoolError(f'{self.name}: worker pool is broken') from exc

    def __enter__(self):
        self.start()
        return self

    def __exit__(self, exc_type, exc, traceback):
        self.stop()
        return False
