package demo;

public class Logger {
    private static final String PREFIX = "[log] ";
    private static final int MAX_LINES = 100;
    private int lines;

    public void info(String message) {
        if (lines < MAX_LINES) {
            System.out.println(PREFIX + message);
            lines = lines + 1;
        }
    }

    public int getLines() {
        return lines;
    }
}
