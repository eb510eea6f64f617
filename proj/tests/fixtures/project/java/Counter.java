package demo;

public class Counter {
    private static final int START = 0;
    private static final int STEP = 1;
    private int count;

    public Counter() {
        count = START;
    }

    public void increment() {
        count = count + STEP;
    }

    public int get() {
        return count;
    }

    public void reset() {
        count = START;
    }
}
