package demo;

public class Account {
    private static final double RATE = 0.05;
    private static final int LIMIT = 1000;
    private final String owner;
    private double balance;

    public Account(String owner) {
        this.owner = owner;
        balance = 0.0;
    }

    public boolean withdraw(double amount) {
        if (amount > balance) {
            return false;
        }
        balance = balance - amount;
        return true;
    }

    public void deposit(double amount) {
        if (amount < LIMIT) {
            balance = balance + amount;
        }
    }

    public double interest() {
        return balance * RATE;
    }

    public String getOwner() {
        return owner;
    }
}
