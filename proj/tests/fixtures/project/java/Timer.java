package demo;

public class Timer {
    private static final long MILLIS = 1000;
    private static final int MAX_TICKS = 60;
    private long elapsed;
    private int ticks;

    public void tick() {
        if (ticks < MAX_TICKS) {
            ticks = ticks + 1;
            elapsed = elapsed + MILLIS;
        }
    }

    public long getElapsed() {
        return elapsed;
    }

    public boolean isDone() {
        return ticks >= MAX_TICKS;
    }
}
